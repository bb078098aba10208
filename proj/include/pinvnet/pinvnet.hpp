#pragma once

#include "pinvnet/activation.hpp"
#include "pinvnet/analysis.hpp"
#include "pinvnet/data.hpp"
#include "pinvnet/error.hpp"
#include "pinvnet/io.hpp"
#include "pinvnet/learner.hpp"
#include "pinvnet/matrix.hpp"
#include "pinvnet/network.hpp"
#include "pinvnet/pinv.hpp"
#include "pinvnet/random.hpp"
