#pragma once

#include "millerpole/error.hpp"
#include "millerpole/polynomial.hpp"
#include "millerpole/roots.hpp"
#include "millerpole/rational.hpp"
#include "millerpole/netlist.hpp"
#include "millerpole/feedback.hpp"
#include "millerpole/rootlocus.hpp"
#include "millerpole/polesplit.hpp"
#include "millerpole/stability.hpp"
