#include <filesystem>

#include <gtest/gtest.h>

#include "texseg/core/checkpoint.hpp"
#include "texseg/core/image.hpp"
#include "texseg/core/png_io.hpp"
#include "texseg/core/rng.hpp"
#include "texseg/core/tensor.hpp"

namespace fs = std::filesystem;
using namespace texseg;

namespace {

fs::path temp_dir() {
    const fs::path p = fs::temp_directory_path() / "texseg_core_test";
    fs::create_directories(p);
    return p;
}

} // namespace

TEST(Tensor, ShapeAndIndexing) {
    Tensor t({2, 3}, 0.0);
    EXPECT_EQ(t.numel(), 6);
    t.at2(1, 2) = 5.0;
    EXPECT_DOUBLE_EQ(t[5], 5.0);
    Tensor u = Tensor::from({3}, {1.0, 2.0, 3.0});
    EXPECT_TRUE(u.all_finite());
    u[1] = HUGE_VAL;
    EXPECT_FALSE(u.all_finite());
}

TEST(Rng, DeterministicStreams) {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
    bool differs = false;
    Rng a2(42);
    for (int i = 0; i < 16; ++i) differs |= a2.next_u64() != c.next_u64();
    EXPECT_TRUE(differs);
}

TEST(Rng, UniformBounds) {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        const int64_t v = rng.uniform_int(-3, 3);
        EXPECT_GE(v, -3);
        EXPECT_LE(v, 3);
    }
}

TEST(Rng, DeriveSeedIndependentOfCallOrder) {
    const uint64_t s7 = derive_seed(123, 7);
    const uint64_t s8 = derive_seed(123, 8);
    EXPECT_NE(s7, s8);
    EXPECT_EQ(s7, derive_seed(123, 7));
}

TEST(Png, RoundTripRgb) {
    Rng rng(1);
    ImageU8 img(21, 17, 3);
    for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.uniform_int(0, 255));
    const auto path = (temp_dir() / "rgb.png").string();
    write_png(path, img);
    EXPECT_EQ(read_png(path), img);
}

TEST(Png, RoundTripGray) {
    Rng rng(2);
    ImageU8 img(5, 64, 1);
    for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.uniform_int(0, 255));
    const auto path = (temp_dir() / "gray.png").string();
    write_png(path, img);
    EXPECT_EQ(read_png(path), img);
}

TEST(Png, RejectsMissingFile) {
    EXPECT_THROW(read_png((temp_dir() / "nope.png").string()), std::runtime_error);
}

TEST(Png, RejectsCorruptedCrc) {
    ImageU8 img(4, 4, 1, 128);
    const auto path = (temp_dir() / "crc.png").string();
    write_png(path, img);
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    char byte;
    f.seekg(20);
    f.get(byte);
    byte = static_cast<char>(byte ^ 0xFF);
    f.seekp(20);
    f.put(byte);
    f.close();
    EXPECT_THROW(read_png(path), std::runtime_error);
}

TEST(Checkpoint, BlobRoundTrip) {
    Tensor a = Tensor::from({2, 2}, {1.0, -2.0, 3.5, 0.25});
    Tensor b = Tensor::from({3}, {9.0, 8.0, 7.0});
    const auto path = (temp_dir() / "params.ckpt").string();
    save_param_blob(path, {{"a", &a}, {"b", &b}});

    Tensor a2({2, 2}), b2({3});
    load_param_blob(path, {{"a", &a2}, {"b", &b2}});
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(a2[i], a[i]);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(b2[i], b[i]);

    Tensor wrong({2, 3});
    EXPECT_THROW(load_param_blob(path, {{"a", &wrong}, {"b", &b2}}), std::runtime_error);
    EXPECT_THROW(load_param_blob(path, {{"x", &a2}, {"b", &b2}}), std::runtime_error);
}

TEST(Checkpoint, Sidecar) {
    const auto path = (temp_dir() / "model.ckpt").string();
    Tensor a({1});
    save_param_blob(path, {{"a", &a}});
    save_sidecar(path, {{"lr", 0.01}}, 123, 77);
    const nlohmann::json j = load_sidecar(path);
    EXPECT_EQ(j.at("iteration").get<int>(), 123);
    EXPECT_EQ(j.at("seed").get<int>(), 77);
    EXPECT_DOUBLE_EQ(j.at("config").at("lr").get<double>(), 0.01);
}

TEST(Image, TensorConversion) {
    ImageU8 img(2, 2, 3);
    img.at(0, 0, 0) = 255;
    img.at(1, 1, 2) = 51;
    const Tensor t = image_to_tensor(img);
    EXPECT_DOUBLE_EQ(t.at3(0, 0, 0), 1.0);
    EXPECT_DOUBLE_EQ(t.at3(2, 1, 1), 0.2);
    EXPECT_DOUBLE_EQ(t.at3(1, 0, 1), 0.0);
}

TEST(Image, HorizontalFlip) {
    ImageU8 img(1, 3, 1);
    img.at(0, 0, 0) = 1;
    img.at(0, 2, 0) = 3;
    const ImageU8 f = hflip(img);
    EXPECT_EQ(f.at(0, 0, 0), 3);
    EXPECT_EQ(f.at(0, 2, 0), 1);
}
