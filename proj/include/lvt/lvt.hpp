#pragma once

#include "lvt/analytic_lhv.hpp"
#include "lvt/core_model.hpp"
#include "lvt/errors.hpp"
#include "lvt/estimate.hpp"
#include "lvt/inequalities.hpp"
#include "lvt/lhv_construct.hpp"
#include "lvt/mc_search.hpp"
#include "lvt/oracle_lp.hpp"
#include "lvt/records.hpp"
