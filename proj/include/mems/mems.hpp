#pragma once

#include "mems/errors.hpp"
#include "mems/problem.hpp"
#include "mems/mesh.hpp"
#include "mems/tridiagonal.hpp"
#include "mems/discretization.hpp"
#include "mems/solver.hpp"
#include "mems/shooting.hpp"
#include "mems/spectrum.hpp"
#include "mems/continuation.hpp"
#include "mems/pohozaev.hpp"
#include "mems/config.hpp"
#include "mems/io.hpp"
#include "mems/cli.hpp"
