// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include "hdrforge/calibration.hpp"
#include "hdrforge/color.hpp"
#include "hdrforge/error.hpp"
#include "hdrforge/fit.hpp"
#include "hdrforge/image.hpp"
#include "hdrforge/io/crf.hpp"
#include "hdrforge/io/ldr.hpp"
#include "hdrforge/io/manifest.hpp"
#include "hdrforge/io/rgbe.hpp"
#include "hdrforge/metrics.hpp"
#include "hdrforge/netops.hpp"
#include "hdrforge/objectives.hpp"
#include "hdrforge/parallel.hpp"
#include "hdrforge/resize.hpp"
#include "hdrforge/synthesis.hpp"
#include "hdrforge/tonemap.hpp"
