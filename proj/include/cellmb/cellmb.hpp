#pragma once

#include "cellmb/assignment.hpp"
#include "cellmb/control.hpp"
#include "cellmb/errors.hpp"
#include "cellmb/gaussian.hpp"
#include "cellmb/gospa.hpp"
#include "cellmb/grid.hpp"
#include "cellmb/info_gain.hpp"
#include "cellmb/motion.hpp"
#include "cellmb/rfs.hpp"
#include "cellmb/sensor.hpp"
#include "cellmb/sim.hpp"
#include "cellmb/tracker.hpp"
#include "cellmb/undiscovered.hpp"
