#ifndef LEXFORGE_HPP
#define LEXFORGE_HPP

#include "lexforge/config.hpp"
#include "lexforge/corpus_ingest.hpp"
#include "lexforge/error.hpp"
#include "lexforge/eval_metrics.hpp"
#include "lexforge/ner_silver.hpp"
#include "lexforge/pretrain_instances.hpp"
#include "lexforge/sentence_pipeline.hpp"
#include "lexforge/split.hpp"
#include "lexforge/summarizer.hpp"
#include "lexforge/wordpiece.hpp"

#endif  // LEXFORGE_HPP
