#pragma once

#include "qreg/chaos_stats.hpp"
#include "qreg/dynamics.hpp"
#include "qreg/ensemble.hpp"
#include "qreg/manifest.hpp"
#include "qreg/register_model.hpp"
#include "qreg/rng.hpp"
#include "qreg/spectral.hpp"
#include "qreg/version.hpp"
