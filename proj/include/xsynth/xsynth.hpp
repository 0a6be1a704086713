#ifndef XSYNTH_XSYNTH_HPP
#define XSYNTH_XSYNTH_HPP

#include "xsynth/coverage.hpp"
#include "xsynth/dgp.hpp"
#include "xsynth/errors.hpp"
#include "xsynth/estimators.hpp"
#include "xsynth/inference.hpp"
#include "xsynth/panel.hpp"
#include "xsynth/projections.hpp"
#include "xsynth/rng.hpp"
#include "xsynth/solver.hpp"
#include "xsynth/student_t.hpp"

#endif
