#pragma once

#include "marking/align.hpp"
#include "marking/dataset.hpp"
#include "marking/encoder.hpp"
#include "marking/error.hpp"
#include "marking/esnli.hpp"
#include "marking/eval.hpp"
#include "marking/labels.hpp"
#include "marking/markup.hpp"
#include "marking/model.hpp"
#include "marking/pipeline.hpp"
#include "marking/report.hpp"
#include "marking/stopwords.hpp"
#include "marking/tensor.hpp"
#include "marking/tokenizer.hpp"
