#pragma once

#include "thermofuse/activity.hpp"
#include "thermofuse/core.hpp"
#include "thermofuse/fuse.hpp"
#include "thermofuse/io.hpp"
#include "thermofuse/metrics.hpp"
#include "thermofuse/optics.hpp"
#include "thermofuse/select.hpp"
