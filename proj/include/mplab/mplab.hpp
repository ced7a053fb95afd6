#pragma once

#include "mplab/configspace.hpp"
#include "mplab/disorder.hpp"
#include "mplab/interaction.hpp"
#include "mplab/hamiltonian.hpp"
#include "mplab/spectral.hpp"
#include "mplab/parallel.hpp"
#include "mplab/estimate.hpp"
#include "mplab/decay_fit.hpp"
#include "mplab/moments.hpp"
#include "mplab/bmonitor.hpp"
#include "mplab/region_scan.hpp"
#include "mplab/version.hpp"
#include "mplab/harness/table.hpp"
#include "mplab/harness/config.hpp"
#include "mplab/harness/run.hpp"
