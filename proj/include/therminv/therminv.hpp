#pragma once

#include "therminv/dynamics.hpp"
#include "therminv/energy.hpp"
#include "therminv/harness.hpp"
#include "therminv/io.hpp"
#include "therminv/linalg.hpp"
#include "therminv/matrix.hpp"
#include "therminv/onn.hpp"
#include "therminv/rng.hpp"
