#pragma once

#include "cqt/box.hpp"
#include "cqt/ccr.hpp"
#include "cqt/error.hpp"
#include "cqt/gaussian.hpp"
#include "cqt/hilbert.hpp"
#include "cqt/parallel.hpp"
#include "cqt/propagator.hpp"
