#pragma once

// Everything except the network server (otf/server/*).

#include "otf/core/error.hpp"
#include "otf/core/geometry.hpp"
#include "otf/core/json_io.hpp"
#include "otf/core/normalize.hpp"
#include "otf/core/rng.hpp"
#include "otf/core/types.hpp"
#include "otf/core/validate.hpp"

#include "otf/session/align.hpp"
#include "otf/session/clock.hpp"
#include "otf/session/engine.hpp"
#include "otf/session/event.hpp"
#include "otf/session/keyframes.hpp"
#include "otf/session/trim.hpp"

#include "otf/analysis/budget.hpp"
#include "otf/analysis/density.hpp"
#include "otf/analysis/reports.hpp"
#include "otf/analysis/split.hpp"
#include "otf/analysis/stats.hpp"
#include "otf/analysis/timing.hpp"

#include "otf/eval/ap.hpp"
#include "otf/eval/coco.hpp"
#include "otf/eval/exchange.hpp"
#include "otf/eval/iou.hpp"
#include "otf/eval/teacher.hpp"

#include "otf/synth/annotator.hpp"
#include "otf/synth/experiment.hpp"
#include "otf/synth/scene.hpp"
