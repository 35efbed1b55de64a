#pragma once

#include "sdca_admm/linalg.hpp"
#include "sdca_admm/losses.hpp"
#include "sdca_admm/regularizers.hpp"
#include "sdca_admm/data.hpp"
#include "sdca_admm/metrics.hpp"
#include "sdca_admm/solver.hpp"
#include "sdca_admm/bench.hpp"
