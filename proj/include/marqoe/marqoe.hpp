// SPDX-FileCopyrightText: Copyright (c) 2026 The marqoe Authors
// SPDX-License-Identifier: Apache-2.0

// Everything except the HTTP-backed LLM adapter, which pulls in httplib.

#pragma once

#include "marqoe/agent/intent.hpp"
#include "marqoe/agent/protocol.hpp"
#include "marqoe/agent/schema.hpp"
#include "marqoe/agent/tools.hpp"
#include "marqoe/agent/ucr.hpp"
#include "marqoe/allocate.hpp"
#include "marqoe/config.hpp"
#include "marqoe/error.hpp"
#include "marqoe/eval.hpp"
#include "marqoe/experiment.hpp"
#include "marqoe/geometry.hpp"
#include "marqoe/kalman.hpp"
#include "marqoe/network.hpp"
#include "marqoe/predict.hpp"
#include "marqoe/queue_sim.hpp"
#include "marqoe/random.hpp"
#include "marqoe/report.hpp"
#include "marqoe/simulation.hpp"
#include "marqoe/synthetic.hpp"
#include "marqoe/trace.hpp"
