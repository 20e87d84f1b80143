#pragma once

// Umbrella header: the whole library in one include.

#include "concat/analysis.hpp"
#include "concat/backends.hpp"
#include "concat/benefit.hpp"
#include "concat/clustering.hpp"
#include "concat/config.hpp"
#include "concat/core.hpp"
#include "concat/dataset.hpp"
#include "concat/errors.hpp"
#include "concat/executor.hpp"
#include "concat/http_backend.hpp"
#include "concat/orchestrator.hpp"
#include "concat/prompts.hpp"
#include "concat/propcheck.hpp"
#include "concat/pyparse.hpp"
#include "concat/record_json.hpp"
#include "concat/runner.hpp"
#include "concat/sim_backend.hpp"
#include "concat/similarity.hpp"
#include "concat/topology.hpp"
