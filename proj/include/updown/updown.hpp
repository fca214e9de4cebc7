#pragma once

#include "updown/bias.hpp"
#include "updown/config.hpp"
#include "updown/core.hpp"
#include "updown/csv.hpp"
#include "updown/dag.hpp"
#include "updown/designs.hpp"
#include "updown/error.hpp"
#include "updown/estimators.hpp"
#include "updown/parallel.hpp"
#include "updown/random.hpp"
#include "updown/sim.hpp"
#include "updown/study.hpp"
