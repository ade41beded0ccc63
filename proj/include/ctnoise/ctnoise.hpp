#pragma once

#include "ctnoise/error.hpp"
#include "ctnoise/image.hpp"
#include "ctnoise/image_io.hpp"
#include "ctnoise/spatial_filters.hpp"
#include "ctnoise/dtcwt.hpp"
#include "ctnoise/spectral_filters.hpp"
#include "ctnoise/filter_spec.hpp"
#include "ctnoise/noise_metrics.hpp"
#include "ctnoise/phantom.hpp"
#include "ctnoise/sweep.hpp"
#include "ctnoise/sweep_io.hpp"
