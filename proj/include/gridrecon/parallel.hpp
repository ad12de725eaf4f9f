#pragma once

// Every data-parallel kernel in the library has two paths: a plain serial loop
// kept as the reference implementation, and an OpenMP path. Both must produce
// bit-identical results; the tests compare them and bench/ times them.

namespace gridrecon {

enum class Execution { serial, parallel };

}  // namespace gridrecon
