#pragma once

// Umbrella header for the lanetrack library.

#include "lanetrack/config.hpp"
#include "lanetrack/detection.hpp"
#include "lanetrack/dynamics.hpp"
#include "lanetrack/evaluation.hpp"
#include "lanetrack/geometry.hpp"
#include "lanetrack/image.hpp"
#include "lanetrack/io.hpp"
#include "lanetrack/kalman.hpp"
#include "lanetrack/matrix.hpp"
#include "lanetrack/observation.hpp"
#include "lanetrack/particle.hpp"
#include "lanetrack/rng.hpp"
#include "lanetrack/simulator.hpp"
