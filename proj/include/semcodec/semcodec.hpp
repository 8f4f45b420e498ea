// Umbrella header.
#pragma once

#include "semcodec/backend.hpp"
#include "semcodec/config.hpp"
#include "semcodec/container.hpp"
#include "semcodec/errors.hpp"
#include "semcodec/http_backend.hpp"
#include "semcodec/image.hpp"
#include "semcodec/metrics.hpp"
#include "semcodec/mock_backend.hpp"
#include "semcodec/pipeline.hpp"
#include "semcodec/prompts.hpp"
#include "semcodec/reflection.hpp"
#include "semcodec/textcodec.hpp"
#include "semcodec/transcript.hpp"
