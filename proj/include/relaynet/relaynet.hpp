#pragma once

#include "relaynet/benchmark.hpp"
#include "relaynet/channel.hpp"
#include "relaynet/cnn.hpp"
#include "relaynet/common.hpp"
#include "relaynet/dataset.hpp"
#include "relaynet/expert.hpp"
#include "relaynet/extraction.hpp"
#include "relaynet/image.hpp"
#include "relaynet/lmi_solver.hpp"
#include "relaynet/netgraph.hpp"
#include "relaynet/patrol.hpp"
#include "relaynet/planner.hpp"
#include "relaynet/png_io.hpp"
#include "relaynet/scenarios.hpp"
