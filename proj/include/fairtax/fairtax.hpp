#pragma once

// Umbrella header for the fairtax library: fairness-efficiency frontiers for
// commodity taxation in monopolistic screening economies.

#include "fairtax/couplings.hpp"
#include "fairtax/errors.hpp"
#include "fairtax/frontier.hpp"
#include "fairtax/io.hpp"
#include "fairtax/marginals.hpp"
#include "fairtax/mechanism.hpp"
#include "fairtax/numerics.hpp"
#include "fairtax/oracle.hpp"
#include "fairtax/orders.hpp"
