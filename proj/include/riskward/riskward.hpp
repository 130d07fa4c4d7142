#pragma once

#include "riskward/agent.hpp"
#include "riskward/config.hpp"
#include "riskward/env.hpp"
#include "riskward/indicators.hpp"
#include "riskward/io.hpp"
#include "riskward/marketdata.hpp"
#include "riskward/metrics.hpp"
#include "riskward/reward.hpp"
#include "riskward/tuner.hpp"
