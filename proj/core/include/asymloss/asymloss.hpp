#pragma once

#include "asymloss/core.hpp"
#include "asymloss/dataset_io.hpp"
#include "asymloss/error.hpp"
#include "asymloss/harness.hpp"
#include "asymloss/losses.hpp"
#include "asymloss/mlp.hpp"
#include "asymloss/noise.hpp"
#include "asymloss/rng.hpp"
#include "asymloss/trainer.hpp"
#include "asymloss/verifier.hpp"
