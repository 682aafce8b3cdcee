#pragma once

// Umbrella header: every module of the library.

#include "khess/errors.hpp"
#include "khess/numerics.hpp"
#include "khess/hessian.hpp"
#include "khess/nonlinearity.hpp"
#include "khess/profile.hpp"
#include "khess/radial.hpp"
#include "khess/report.hpp"
#include "khess/geometry.hpp"
#include "khess/fd2d.hpp"
#include "khess/barrier.hpp"
#include "khess/experiment.hpp"
