#ifndef LOGITMC_LOGITMC_HPP_
#define LOGITMC_LOGITMC_HPP_

#include "logitmc/case_control.hpp"
#include "logitmc/chain.hpp"
#include "logitmc/chain_io.hpp"
#include "logitmc/consensus.hpp"
#include "logitmc/data_io.hpp"
#include "logitmc/diagnostics.hpp"
#include "logitmc/error.hpp"
#include "logitmc/manifest.hpp"
#include "logitmc/model.hpp"
#include "logitmc/parallel.hpp"
#include "logitmc/random.hpp"
#include "logitmc/samplers.hpp"
#include "logitmc/synthetic.hpp"
#include "logitmc/workflow.hpp"

#endif  // LOGITMC_LOGITMC_HPP_
