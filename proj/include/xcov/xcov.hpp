#pragma once

#include "xcov/bench.hpp"
#include "xcov/cleaner.hpp"
#include "xcov/empirical.hpp"
#include "xcov/io.hpp"
#include "xcov/model.hpp"
#include "xcov/oracle.hpp"
#include "xcov/resolvent.hpp"
#include "xcov/rng.hpp"
