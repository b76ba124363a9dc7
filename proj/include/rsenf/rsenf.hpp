#pragma once

#include "rsenf/cli.hpp"
#include "rsenf/core_model.hpp"
#include "rsenf/error.hpp"
#include "rsenf/idle_estimation.hpp"
#include "rsenf/io.hpp"
#include "rsenf/profiles.hpp"
#include "rsenf/series.hpp"
#include "rsenf/spectral.hpp"
#include "rsenf/synthesis.hpp"
#include "rsenf/verification.hpp"
