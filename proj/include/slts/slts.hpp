#pragma once

#include "errors.hpp"
#include "trimmed_ops.hpp"
#include "problem.hpp"
#include "pgm.hpp"
#include "nonlinear.hpp"
#include "lasso.hpp"
#include "fast_slts.hpp"
#include "multistart.hpp"
#include "datagen.hpp"
#include "io.hpp"
#include "bench.hpp"
