#pragma once

// Umbrella header. config.hpp and report.hpp additionally need json.hpp on
// the include path; the numerical headers need only Eigen.
#include "pcc/errors.hpp"
#include "pcc/linalg.hpp"
#include "pcc/system.hpp"
#include "pcc/subspace.hpp"
#include "pcc/dual.hpp"
#include "pcc/models.hpp"
#include "pcc/observability.hpp"
#include "pcc/minimizer.hpp"
#include "pcc/config.hpp"
#include "pcc/report.hpp"
