#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include "fognet/protocol.hpp"
#include "msggen.hpp"

using namespace fognet;
using namespace fognet::protocol;
using msggen::equal;
using msggen::random_message;



TEST_CASE("round trip identity for every message type under fuzzing") {
  std::mt19937 rng(2024);
  for (int type = 0; type < 6; ++type) {
    for (int i = 0; i < 500; ++i) {
      const Message m = random_message(rng, type);
      const auto bytes = encode(m);
      const DecodeResult r = decode(bytes);
      REQUIRE(r.status == DecodeStatus::Ok);
      CHECK(r.consumed == bytes.size());
      REQUIRE(r.message.has_value());
      CHECK(equal(m, *r.message));
    }
  }
}

TEST_CASE("truncated frames request more data without consuming") {
  const auto bytes = encode(ShutdownRequest{"svc-42"});
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    const std::span<const std::uint8_t> partial(bytes.data(), cut);
    const DecodeResult r = decode(partial);
    CHECK(r.status == DecodeStatus::NeedMoreData);
    CHECK(r.consumed == 0);
  }
}

TEST_CASE("declared length five with three octets available waits") {
  std::vector<std::uint8_t> buf{0, 0, 0, 5, 'a', 'b', 'c'};
  const DecodeResult r = decode(buf);
  CHECK(r.status == DecodeStatus::NeedMoreData);
  CHECK(r.consumed == 0);
}

TEST_CASE("empty payload frame is a protocol error") {
  std::vector<std::uint8_t> buf{0, 0, 0, 0};
  const DecodeResult r = decode(buf);
  CHECK(r.status == DecodeStatus::Error);
}

TEST_CASE("oversized frame declaration is rejected") {
  // 2 MiB declared
  std::vector<std::uint8_t> buf{0, 0x20, 0, 0};
  const DecodeResult r = decode(buf);
  CHECK(r.status == DecodeStatus::Error);
}

TEST_CASE("unknown discriminator is a protocol error") {
  const std::string body = R"({"type":"telepathy"})";
  std::vector<std::uint8_t> buf{0, 0, 0, static_cast<std::uint8_t>(body.size())};
  buf.insert(buf.end(), body.begin(), body.end());
  const DecodeResult r = decode(buf);
  CHECK(r.status == DecodeStatus::Error);
}

TEST_CASE("decode does not read past the declared frame") {
  // a valid frame followed by garbage must decode cleanly and report
  // consuming only the frame
  auto bytes = encode(ShutdownRequest{"svc-1"});
  const std::size_t frame_len = bytes.size();
  bytes.push_back(0xff);
  bytes.push_back(0x00);
  const DecodeResult r = decode(bytes);
  REQUIRE(r.status == DecodeStatus::Ok);
  CHECK(r.consumed == frame_len);
}

TEST_CASE("out of range utilization fractions are rejected at decode") {
  const std::string body =
      R"({"type":"resource_report","fog_id":"fog:1","processor_utilization":1.3,"memory_utilization":0.5})";
  std::vector<std::uint8_t> buf{0, 0, 0, static_cast<std::uint8_t>(body.size())};
  buf.insert(buf.end(), body.begin(), body.end());
  CHECK(decode(buf).status == DecodeStatus::Error);
}

TEST_CASE("fog greeting without capacities is rejected") {
  const std::string body = R"({"type":"greeting","node_id":"fog:3","device_type":"fog"})";
  std::vector<std::uint8_t> buf{0, 0, 0, static_cast<std::uint8_t>(body.size())};
  buf.insert(buf.end(), body.begin(), body.end());
  CHECK(decode(buf).status == DecodeStatus::Error);
}
