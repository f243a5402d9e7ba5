#pragma once

#include "ninr/checkpoint.hpp"
#include "ninr/dataio.hpp"
#include "ninr/dataset.hpp"
#include "ninr/diagnostics.hpp"
#include "ninr/error.hpp"
#include "ninr/lineartoy.hpp"
#include "ninr/loss.hpp"
#include "ninr/network.hpp"
#include "ninr/noise.hpp"
#include "ninr/optimizer.hpp"
#include "ninr/preprocess.hpp"
#include "ninr/rng.hpp"
#include "ninr/robustness.hpp"
#include "ninr/tensor.hpp"
#include "ninr/trace.hpp"
#include "ninr/trainer.hpp"
