#pragma once

// Promotion-time cure modeling with deep predictors: piecewise-exponential
// baselines, feedforward predictors with exact gradients, QR-orthogonalized
// linear/non-linear decomposition, cure-aware metrics, simulation scenarios,
// and a tabular preprocessing pipeline.

#include "ptcure/activations.hpp"
#include "ptcure/baseline.hpp"
#include "ptcure/cure_model.hpp"
#include "ptcure/effects.hpp"
#include "ptcure/errors.hpp"
#include "ptcure/metrics.hpp"
#include "ptcure/model.hpp"
#include "ptcure/net.hpp"
#include "ptcure/optimizer.hpp"
#include "ptcure/ortho.hpp"
#include "ptcure/parallel.hpp"
#include "ptcure/pipeline.hpp"
#include "ptcure/rng.hpp"
#include "ptcure/search.hpp"
#include "ptcure/serialize.hpp"
#include "ptcure/simulation.hpp"
#include "ptcure/train.hpp"
#include "ptcure/types.hpp"
