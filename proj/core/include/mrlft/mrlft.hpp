#pragma once

// Umbrella header for the multirate LFT toolkit.

#include "mrlft/analysis.hpp"
#include "mrlft/block_structure.hpp"
#include "mrlft/branch_and_bound.hpp"
#include "mrlft/discretization.hpp"
#include "mrlft/errors.hpp"
#include "mrlft/hybrid_sim.hpp"
#include "mrlft/lft.hpp"
#include "mrlft/model_io.hpp"
#include "mrlft/mu.hpp"
#include "mrlft/multirate.hpp"
#include "mrlft/parallel.hpp"
#include "mrlft/parameter_box.hpp"
#include "mrlft/satellite.hpp"
#include "mrlft/state_space.hpp"
#include "mrlft/uncertain_ss.hpp"
#include "mrlft/version.hpp"
