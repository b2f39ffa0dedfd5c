#pragma once

#include "otoc/analysis.hpp"
#include "otoc/classical.hpp"
#include "otoc/error.hpp"
#include "otoc/evolution.hpp"
#include "otoc/fock.hpp"
#include "otoc/husimi.hpp"
#include "otoc/series.hpp"
