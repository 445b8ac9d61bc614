#pragma once

#include "gsaudit/classifiers/adaboost.hpp"
#include "gsaudit/classifiers/boosted_trees.hpp"
#include "gsaudit/classifiers/config.hpp"
#include "gsaudit/classifiers/grid_search.hpp"
#include "gsaudit/classifiers/linear.hpp"
#include "gsaudit/classifiers/model.hpp"
#include "gsaudit/corpus.hpp"
#include "gsaudit/error.hpp"
#include "gsaudit/eval/harness.hpp"
#include "gsaudit/eval/metrics.hpp"
#include "gsaudit/features.hpp"
#include "gsaudit/genre.hpp"
#include "gsaudit/report.hpp"
#include "gsaudit/rng.hpp"
#include "gsaudit/special_functions.hpp"
#include "gsaudit/stereotype.hpp"
#include "gsaudit/surveystats.hpp"
