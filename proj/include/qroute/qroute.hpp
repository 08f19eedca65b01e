#pragma once

#include "qroute/bench.hpp"
#include "qroute/clustering.hpp"
#include "qroute/dip_test.hpp"
#include "qroute/full_solver.hpp"
#include "qroute/instance_io.hpp"
#include "qroute/parallel.hpp"
#include "qroute/qubo_model.hpp"
#include "qroute/routing_classical.hpp"
#include "qroute/routing_qubo.hpp"
#include "qroute/samplers.hpp"
#include "qroute/solution.hpp"
#include "qroute/validation.hpp"
