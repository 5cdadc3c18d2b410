#pragma once

#include "survrisk/boosting.hpp"
#include "survrisk/calibration.hpp"
#include "survrisk/cohort.hpp"
#include "survrisk/concordance.hpp"
#include "survrisk/cox.hpp"
#include "survrisk/csv.hpp"
#include "survrisk/design.hpp"
#include "survrisk/error.hpp"
#include "survrisk/evaluate.hpp"
#include "survrisk/frailty.hpp"
#include "survrisk/kaplan_meier.hpp"
#include "survrisk/locations.hpp"
#include "survrisk/model.hpp"
#include "survrisk/net_benefit.hpp"
#include "survrisk/poisson.hpp"
#include "survrisk/rng.hpp"
#include "survrisk/simulate.hpp"
#include "survrisk/step_function.hpp"
#include "survrisk/tree.hpp"
#include "survrisk/tuning.hpp"
