#pragma once

#include "benchmarks.hpp"
#include "boundary.hpp"
#include "cma.hpp"
#include "configuration.hpp"
#include "metrics.hpp"
#include "modules.hpp"
#include "parameters.hpp"
#include "report.hpp"
#include "restart.hpp"
#include "sampling.hpp"
#include "stepsize.hpp"
#include "tuner.hpp"
