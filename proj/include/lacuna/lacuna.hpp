#pragma once

#include "lacuna/error.hpp"
#include "lacuna/geometry.hpp"
#include "lacuna/dyadic_walsh.hpp"
#include "lacuna/tile_plane.hpp"
#include "lacuna/carleson_model.hpp"
#include "lacuna/fit.hpp"
#include "lacuna/norms_orlicz.hpp"
#include "lacuna/tf_decomposition.hpp"
#include "lacuna/experiments.hpp"
