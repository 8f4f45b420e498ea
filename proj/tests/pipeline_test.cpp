#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace semcodec;
using support::ScriptedBackend;

namespace {

// Oracle values for boat.png with K=30, computed by an independent Python
// script (stopword filter, devowel table, first-alphabetical reverse lookup
// over data/wordlist.txt).
const std::string kSelected =
    "large white wooden boat floats calm turquoise water center photo huge pale blue sky fills upper half "
    "small soft clouds top left corner medium red stripe runs hull boat small";
const std::string kCompressed =
    "lrg vht vdn bt flts clm trks vtr cntr pht hg pl bl sk flls ppr hlf smll sft clds tp lft crnr mdm rd strp "
    "rns hll bt smll";
const std::string kDecompressed =
    "large what wooden about flats calm trks voter center photo hug pal able ask falls appear half small "
    "safety clouds tap left corner madame aired strap rains hall about small";

std::vector<Stage> stages(std::initializer_list<Stage> s) { return s; }

}  // namespace

TEST(Encode, BoatMatchesOracle) {
    auto mock = support::make_mock();
    const auto enc = encode_image(support::boat_image(), PipelineConfig{}, mock);
    EXPECT_TRUE(enc.intermediate.description.starts_with("A large white wooden boat"));
    EXPECT_EQ(enc.intermediate.selected_words, kSelected);
    EXPECT_EQ(enc.intermediate.compressed_text, kCompressed);
    EXPECT_EQ(enc.container.size(), 13u + 60u);
    EXPECT_EQ(enc.report.bits, 480u);
    EXPECT_DOUBLE_EQ(enc.report.microbpp, 457.763671875);
    EXPECT_EQ(enc.report.region, Region::semantic);
    EXPECT_FALSE(enc.word_budget_violation);
    EXPECT_EQ(enc.transcript.stage_names(), stages({Stage::describe, Stage::word_select, Stage::word_compress}));
    EXPECT_TRUE(enc.transcript.session_id().starts_with("enc-"));
    EXPECT_EQ(enc.transcript.stages()[0].input, image_token(support::boat_image().content_hash()));
}

TEST(Encode, PayloadBitsEqualFourTimesSymbols) {
    auto mock = support::make_mock();
    for (std::size_t k : {1u, 5u, 10u, 30u, 60u}) {
        PipelineConfig cfg;
        cfg.target_word_count = k;
        const auto enc = encode_image(support::boat_image(), cfg, mock);
        const auto c = decode_container(enc.container);
        EXPECT_EQ(enc.report.bits, 4 * c.symbol_count());
        EXPECT_EQ(from_symbols(c.symbols), enc.intermediate.compressed_text);
    }
}

TEST(Encode, RepairCanonicalizesModelOutput) {
    ScriptedBackend backend([](TransformTask t, std::string_view, std::string_view) -> std::optional<std::string> {
        if (t == TransformTask::word_compress) return "Wndw,  Shdw!";
        return std::nullopt;
    });
    PipelineConfig cfg;
    cfg.target_word_count = 2;
    const auto enc = encode_image(support::boat_image(), cfg, backend);
    EXPECT_EQ(enc.intermediate.compressed_text, "vndv shdv");
    EXPECT_NE(enc.transcript.stages().back().note.find("canonical=\"vndv shdv\""), std::string::npos);
}

TEST(Encode, StrictRejectsIllegalSymbol) {
    ScriptedBackend backend([](TransformTask t, std::string_view, std::string_view) -> std::optional<std::string> {
        if (t == TransformTask::word_compress) return "wndw";
        return std::nullopt;
    });
    PipelineConfig cfg;
    cfg.repair_policy = RepairPolicy::strict();
    try {
        encode_image(support::boat_image(), cfg, backend);
        FAIL();
    } catch (const IllegalSymbol &e) {
        EXPECT_EQ(e.position(), 0u);
        EXPECT_EQ(e.character(), 'w');
    }
}

TEST(Encode, WordBudgetWarnsButContinues) {
    for (auto [words, expect_warning] :
         {std::pair{26u, true}, std::pair{27u, false}, std::pair{30u, false}, std::pair{33u, false},
          std::pair{34u, true}}) {
        ScriptedBackend backend([n = words](TransformTask t, std::string_view,
                                            std::string_view) -> std::optional<std::string> {
            if (t == TransformTask::word_select) return support::words_of(n);
            return std::nullopt;
        });
        const auto enc = encode_image(support::boat_image(), PipelineConfig{}, backend);
        EXPECT_EQ(enc.word_budget_violation.has_value(), expect_warning) << words;
        EXPECT_EQ(enc.transcript.warnings().size(), expect_warning ? 1u : 0u);
        EXPECT_FALSE(enc.container.empty());
        if (expect_warning) {
            EXPECT_EQ(enc.word_budget_violation->actual, words);
            EXPECT_EQ(enc.transcript.to_json()["warnings"][0]["kind"], "WordBudgetViolation");
        }
    }
}

TEST(WordBudget, ToleranceBoundary) {
    EXPECT_FALSE(check_word_budget(27, 30, 0.10));
    EXPECT_FALSE(check_word_budget(33, 30, 0.10));
    EXPECT_TRUE(check_word_budget(26, 30, 0.10));
    EXPECT_TRUE(check_word_budget(34, 30, 0.10));
    EXPECT_FALSE(check_word_budget(10, 10, 0.0));
    EXPECT_TRUE(check_word_budget(11, 10, 0.0));
    const auto v = check_word_budget(20, 30, 0.10);
    ASSERT_TRUE(v);
    EXPECT_NEAR(v->deviation, 1.0 / 3.0, 1e-12);
}

TEST(Decode, BoatMatchesOracleAndSkipsReflection) {
    auto mock = support::make_mock();
    const auto enc = encode_image(support::boat_image(), PipelineConfig{}, mock);
    const auto dec = decode_container(enc.container, PipelineConfig{}, mock);
    EXPECT_EQ(dec.compressed_text, kCompressed);
    EXPECT_EQ(dec.decompressed_text, kDecompressed);
    EXPECT_EQ(dec.reflection_skipped, SkipReason::below_threshold);
    EXPECT_FALSE(dec.reflection_trace);
    EXPECT_EQ(dec.image.content_hash(), dec.initial_image.content_hash());
    const auto expected = placeholder_image(sha256(Backend::compose(PromptSet::defaults().generate, kDecompressed)));
    EXPECT_EQ(dec.image.content_hash(), content_hash(expected));
    EXPECT_EQ(dec.transcript.stage_names(),
              stages({Stage::word_decompress, Stage::generate, Stage::reflection_skipped}));
    EXPECT_EQ(dec.transcript.stages().back().output, "below_threshold");
    EXPECT_TRUE(dec.transcript.session_id().starts_with("dec-"));
}

TEST(Decode, ReflectionRunsAboveThreshold) {
    auto mock = support::make_mock();
    PipelineConfig cfg;
    cfg.reflection_threshold_microbpp = 100;
    const auto enc = encode_image(support::boat_image(), cfg, mock);
    const auto dec = decode_container(enc.container, cfg, mock);
    ASSERT_TRUE(dec.reflection_trace);
    ASSERT_EQ(dec.reflection_trace->iterations.size(), 2u);
    EXPECT_EQ(dec.reflection_trace->iterations[0].edit_suggestion, "add half");
    EXPECT_EQ(dec.reflection_trace->iterations[1].edit_suggestion, "add small");
    EXPECT_EQ(dec.image.content_hash(), dec.reflection_trace->iterations[1].regenerated_image_hash);
    EXPECT_EQ(dec.transcript.stage_names(),
              stages({Stage::word_decompress, Stage::generate, Stage::reflect_describe, Stage::reflect_compare,
                      Stage::reflect_generate, Stage::reflect_describe, Stage::reflect_compare,
                      Stage::reflect_generate}));
}

TEST(Decode, SkipReasons) {
    auto mock = support::make_mock();
    PipelineConfig cfg;
    cfg.reflection_threshold_microbpp = 100;
    const auto enc = encode_image(support::boat_image(), cfg, mock);

    PipelineConfig r0 = cfg;
    r0.reflection_iterations = 0;
    EXPECT_EQ(decode_container(enc.container, r0, mock).reflection_skipped, SkipReason::r_zero);

    auto no_edit = support::make_mock(MockOptions{false, 16});
    const auto dec = decode_container(enc.container, cfg, no_edit);
    EXPECT_EQ(dec.reflection_skipped, SkipReason::edit_unsupported);
    EXPECT_EQ(dec.image.content_hash(), dec.initial_image.content_hash());
}

TEST(Decode, EmptyPayloadSkipsDecompress) {
    ScriptedBackend backend([](TransformTask, std::string_view, std::string_view) { return std::nullopt; });
    const auto bytes = encode_container(SymbolString{}, 1024, 1024);
    const auto dec = decode_container(bytes, PipelineConfig{}, backend);
    EXPECT_EQ(backend.transform_calls, 0);
    EXPECT_EQ(dec.decompressed_text, "");
    EXPECT_EQ(dec.transcript.stages()[0].note, "empty payload; model not called");
    EXPECT_FALSE(dec.image.empty());
    EXPECT_EQ(dec.report.bits, 0u);
}

TEST(Decode, RejectsBadContainer) {
    auto mock = support::make_mock();
    std::vector<std::uint8_t> junk{'J', 'P', 'E', 'G', 1, 0, 1, 0, 1, 0, 0, 0, 0};
    EXPECT_THROW(decode_container(junk, PipelineConfig{}, mock), BadMagic);
}

TEST(Pipeline, DeterministicTranscripts) {
    auto a = support::make_mock();
    auto b = support::make_mock();
    PipelineConfig cfg;
    cfg.reflection_threshold_microbpp = 100;
    const auto [enc1, dec1] = roundtrip(support::boat_image(), cfg, a);
    const auto [enc2, dec2] = roundtrip(support::boat_image(), cfg, b);
    EXPECT_EQ(enc1.container, enc2.container);
    EXPECT_EQ(enc1.transcript.to_json().dump(), enc2.transcript.to_json().dump());
    EXPECT_EQ(dec1.transcript.to_json().dump(), dec2.transcript.to_json().dump());
    for (std::size_t i = 0; i < dec1.transcript.stages().size(); ++i) {
        EXPECT_EQ(dec1.transcript.stages()[i].timestamp, i);
    }
}

TEST(Pipeline, SessionHygiene) {
    auto mock = support::make_mock();
    const auto [enc, dec] = roundtrip(support::boat_image(), PipelineConfig{}, mock);
    EXPECT_NE(enc.transcript.session_id(), dec.transcript.session_id());
    EXPECT_TRUE(shared_stage_texts(enc.transcript, dec.transcript, enc.intermediate.compressed_text).empty());
    for (const auto &s : dec.transcript.stages()) {
        EXPECT_NE(s.input, enc.intermediate.description);
        EXPECT_NE(s.output, enc.intermediate.description);
    }
}

TEST(Pipeline, LeakedDescriptionDetected) {
    const auto fixtures = load_mock_fixtures(support::data_dir() / "fixtures");
    const std::string boat = fixtures.at(support::boat_image().content_hash());
    ScriptedBackend leaky([boat](TransformTask t, std::string_view, std::string_view) -> std::optional<std::string> {
        if (t == TransformTask::word_decompress) return boat;
        return std::nullopt;
    });
    EXPECT_THROW(roundtrip(support::boat_image(), PipelineConfig{}, leaky), SessionLeak);
}

TEST(Pipeline, SessionIds) {
    EXPECT_EQ(session_id_for("enc", "x"), session_id_for("enc", "x"));
    EXPECT_NE(session_id_for("enc", "x"), session_id_for("dec", "x"));
    EXPECT_EQ(session_id_for("enc", "x").size(), 4u + 16u);
}

TEST(Transcript, JsonRoundTrip) {
    auto mock = support::make_mock();
    PipelineConfig cfg;
    cfg.reflection_threshold_microbpp = 100;
    const auto [enc, dec] = roundtrip(support::boat_image(), cfg, mock);
    for (const auto *t : {&enc.transcript, &dec.transcript}) {
        const auto j = t->to_json();
        const auto back = SessionTranscript::from_json(j);
        EXPECT_EQ(back.stages(), t->stages());
        EXPECT_EQ(back.to_json(), j);
        EXPECT_EQ(j["backend"]["name"], "mock");
    }
}

TEST(Transcript, WallClockIsMonotone) {
    SessionTranscript t("s", "encoder", TimestampMode::wall);
    for (int i = 0; i < 5; ++i) t.record({Stage::describe, 0, "", "", "", 0, {}});
    for (std::size_t i = 1; i < t.stages().size(); ++i) {
        EXPECT_GE(t.stages()[i].timestamp, t.stages()[i - 1].timestamp);
    }
    EXPECT_GT(t.stages()[0].timestamp, 1'600'000'000'000u);
}

TEST(Config, ValidateRejectsBadValues) {
    PipelineConfig c;
    EXPECT_NO_THROW(c.validate());
    c.target_word_count = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.word_count_tolerance = -0.1;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.reflection_iterations = -1;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.regions.mixed_min = 1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}
