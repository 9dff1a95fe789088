#pragma once

#include "cqt/experiment/config.hpp"
#include "cqt/experiment/plot.hpp"
#include "cqt/experiment/run.hpp"
#include "cqt/experiment/table.hpp"
