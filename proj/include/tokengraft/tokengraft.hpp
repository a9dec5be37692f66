#pragma once

#include "tokengraft/aux_embed.hpp"
#include "tokengraft/bpe.hpp"
#include "tokengraft/compression.hpp"
#include "tokengraft/config.hpp"
#include "tokengraft/corpus.hpp"
#include "tokengraft/embedding.hpp"
#include "tokengraft/error.hpp"
#include "tokengraft/supertoken.hpp"
#include "tokengraft/tensor_io.hpp"
#include "tokengraft/transplant.hpp"
#include "tokengraft/vocabulary.hpp"
