#pragma once

#include "errors.hpp"
#include "trap_config.hpp"
#include "equilibrium.hpp"
#include "modes.hpp"
#include "phonons.hpp"
#include "sweep.hpp"
#include "oracle.hpp"
