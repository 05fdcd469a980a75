#pragma once

#include "icb/agents.hpp"
#include "icb/bandit.hpp"
#include "icb/baselines.hpp"
#include "icb/config.hpp"
#include "icb/dataset.hpp"
#include "icb/environment.hpp"
#include "icb/experiment.hpp"
#include "icb/io.hpp"
#include "icb/linalg.hpp"
#include "icb/metrics.hpp"
#include "icb/model1.hpp"
#include "icb/model2.hpp"
#include "icb/optim.hpp"
#include "icb/sampling.hpp"
