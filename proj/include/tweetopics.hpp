#pragma once

#include "tweetopics/artifact.hpp"
#include "tweetopics/cluster.hpp"
#include "tweetopics/docmodel.hpp"
#include "tweetopics/error.hpp"
#include "tweetopics/gapstat.hpp"
#include "tweetopics/ingest.hpp"
#include "tweetopics/matrix.hpp"
#include "tweetopics/pipeline.hpp"
#include "tweetopics/project.hpp"
#include "tweetopics/random.hpp"
#include "tweetopics/report.hpp"
#include "tweetopics/text_io.hpp"
#include "tweetopics/tokenize.hpp"
#include "tweetopics/trainer.hpp"
#include "tweetopics/utf8.hpp"
#include "tweetopics/vocab.hpp"
