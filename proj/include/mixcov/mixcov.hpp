#pragma once

#include "em.hpp"
#include "error.hpp"
#include "inference.hpp"
#include "link.hpp"
#include "marginal.hpp"
#include "model.hpp"
#include "numeric.hpp"
#include "random.hpp"
#include "simlab.hpp"
#include "spline.hpp"
#include "types.hpp"
