#pragma once

#include "amol/approx.hpp"
#include "amol/cartoon.hpp"
#include "amol/core.hpp"
#include "amol/fft.hpp"
#include "amol/frame3d.hpp"
#include "amol/geometry.hpp"
#include "amol/gramian.hpp"
#include "amol/metric.hpp"
#include "amol/molecule.hpp"
#include "amol/parametrization.hpp"
#include "amol/windows.hpp"
