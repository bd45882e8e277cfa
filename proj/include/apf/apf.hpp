// Copyright 2026 The apfusion Authors
// SPDX-License-Identifier: Apache-2.0

// Umbrella header for the apfusion toolkit.

#pragma once

#include "apf/bias_audit.hpp"
#include "apf/consensus.hpp"
#include "apf/core_types.hpp"
#include "apf/error.hpp"
#include "apf/fusion.hpp"
#include "apf/io.hpp"
#include "apf/metrics.hpp"
#include "apf/nn.hpp"
#include "apf/report.hpp"
#include "apf/rng.hpp"
#include "apf/synth.hpp"
