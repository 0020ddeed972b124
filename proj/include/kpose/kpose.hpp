#pragma once

#include "kpose/error.hpp"
#include "kpose/geometry.hpp"
#include "kpose/shape_basis.hpp"
#include "kpose/observations.hpp"
#include "kpose/wp_solver.hpp"
#include "kpose/fp_solver.hpp"
#include "kpose/pnp.hpp"
#include "kpose/heatmap.hpp"
#include "kpose/io.hpp"
#include "kpose/benchmark.hpp"
