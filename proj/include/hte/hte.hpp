#pragma once

#include "hte/core/csv.hpp"
#include "hte/core/dataset.hpp"
#include "hte/core/error.hpp"
#include "hte/core/folds.hpp"
#include "hte/core/matrix.hpp"
#include "hte/core/parallel.hpp"
#include "hte/core/rng.hpp"

#include "hte/learn/boost.hpp"
#include "hte/learn/elastic_net.hpp"
#include "hte/learn/forest.hpp"
#include "hte/learn/learner.hpp"
#include "hte/learn/tree.hpp"
#include "hte/learn/tune.hpp"

#include "hte/nuisance.hpp"
#include "hte/transforms.hpp"

#include "hte/cate/cate_model.hpp"
#include "hte/cate/causal_tree.hpp"
#include "hte/cate/meta_learners.hpp"
#include "hte/cate/modified_loss.hpp"

#include "hte/policy/policy_model.hpp"
#include "hte/policy/policy_tree.hpp"
#include "hte/policy/weighted_learning.hpp"

#include "hte/subgroup/honest_effects.hpp"
#include "hte/subgroup/prim.hpp"
#include "hte/subgroup/rules.hpp"

#include "hte/inference/heterogeneity.hpp"
#include "hte/inference/linear_model.hpp"

#include "hte/sim/benchmark.hpp"
#include "hte/sim/metrics.hpp"
#include "hte/sim/report.hpp"
#include "hte/sim/scenarios.hpp"
