#pragma once

#include "updown/estimators/fit_result.hpp"
#include "updown/estimators/gauss_hermite.hpp"
#include "updown/estimators/latent_class.hpp"
#include "updown/estimators/logistic.hpp"
#include "updown/estimators/nonparametric.hpp"
#include "updown/estimators/optim.hpp"
#include "updown/estimators/random_intercept.hpp"
#include "updown/estimators/two_stage.hpp"
