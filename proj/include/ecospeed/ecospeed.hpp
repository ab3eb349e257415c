#ifndef ECOSPEED_ECOSPEED_HPP
#define ECOSPEED_ECOSPEED_HPP

#include "error.hpp"
#include "network.hpp"
#include "scenario_io.hpp"
#include "traffic.hpp"
#include "grid.hpp"
#include "emission.hpp"
#include "dispersion.hpp"
#include "objectives.hpp"
#include "moo.hpp"
#include "validate.hpp"
#include "io.hpp"

#endif // ECOSPEED_ECOSPEED_HPP
