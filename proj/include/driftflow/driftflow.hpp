#pragma once

#include "driftflow/drift.hpp"
#include "driftflow/error.hpp"
#include "driftflow/ingest.hpp"
#include "driftflow/learn/grid_search.hpp"
#include "driftflow/learn/metrics.hpp"
#include "driftflow/learn/model.hpp"
#include "driftflow/log.hpp"
#include "driftflow/runner/analysis.hpp"
#include "driftflow/runner/grid.hpp"
#include "driftflow/runner/results.hpp"
#include "driftflow/stats/distributions.hpp"
#include "driftflow/stats/tests.hpp"
#include "driftflow/strategy.hpp"
#include "driftflow/synth.hpp"
#include "driftflow/windowing.hpp"
