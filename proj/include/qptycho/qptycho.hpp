#pragma once

#include "error.hpp"
#include "hilbert.hpp"
#include "projectors.hpp"
#include "forward_model.hpp"
#include "optics.hpp"
#include "pie.hpp"
#include "campaign.hpp"
