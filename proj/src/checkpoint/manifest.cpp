#include <turtledb/checkpoint/manifest.hpp>

#include <turtledb/core/check.hpp>
#include <turtledb/core/coding.hpp>
#include <turtledb/core/hash.hpp>

#include <map>

namespace turtledb {

namespace {

constexpr u32 kManifestVersion = 1;
constexpr u32 kHashAlgoFnv1a64 = 1;
constexpr u64 kHeaderBytes = 16;

constexpr u8 kPhasePrepare = 1;
constexpr u8 kPhaseCommit = 2;

std::string encode_prepare(const Manifest::Prepare& p)
{
  std::string payload;
  payload.push_back(static_cast<char>(kPhasePrepare));
  put_u64(payload, p.generation);
  put_u64(payload, p.root_page);
  put_u64(payload, p.seq_upper_bound);
  put_u32(payload, static_cast<u32>(p.deltas.size()));
  for (const auto& [page, delta] : p.deltas) {
    put_u64(payload, page);
    put_u64(payload, static_cast<u64>(delta));
  }
  return payload;
}

}  // namespace

StatusOr<std::unique_ptr<Manifest>> Manifest::open(Env& env, const std::string& path, StatsCounters* stats)
{
  const bool existed = env.file_exists(path);
  TDB_TRY_ASSIGN(std::unique_ptr<File> file, env.open_file(path, /*create=*/true));
  auto manifest = std::unique_ptr<Manifest>{new Manifest{std::move(file), stats}};

  if (!existed) {
    std::string header;
    put_u64(header, kMagic);
    put_u32(header, kManifestVersion);
    put_u32(header, kHashAlgoFnv1a64);
    TDB_TRY(manifest->file_->pwrite(0, header));
    TDB_TRY(manifest->file_->sync());
    manifest->append_offset_ = kHeaderBytes;
    return manifest;
  }

  TDB_TRY_ASSIGN(u64 size, manifest->file_->size());
  if (size < kHeaderBytes) {
    return Status::open_failure("manifest too short");
  }
  std::string header;
  TDB_TRY(manifest->file_->pread(0, kHeaderBytes, &header));
  if (get_u64(header.data()) != kMagic) {
    return Status::open_failure("bad manifest magic");
  }
  if (get_u32(header.data() + 8) != kManifestVersion) {
    return Status::open_failure("unsupported manifest version");
  }
  if (get_u32(header.data() + 12) != kHashAlgoFnv1a64) {
    return Status::open_failure("unsupported manifest hash algorithm");
  }

  // Replay: apply deltas of every committed generation, stop at the first
  // torn/invalid record (prefix semantics).
  std::map<u64, Prepare> prepared;
  std::map<u64, i64> counts;
  u64 offset = kHeaderBytes;
  while (offset + 12 <= size) {
    std::string len_hash;
    TDB_TRY(manifest->file_->pread(offset, 12, &len_hash));
    const u32 len = get_u32(len_hash.data());
    const u64 hash = get_u64(len_hash.data() + 4);
    if (len == 0 || len > (1u << 26) || offset + 12 + len > size) {
      break;
    }
    std::string payload;
    TDB_TRY(manifest->file_->pread(offset + 12, len, &payload));
    if (fnv1a64(payload.data(), payload.size()) != hash) {
      break;
    }
    offset += 12 + len;

    const u8 phase = static_cast<u8>(payload[0]);
    if (phase == kPhasePrepare && payload.size() >= 29) {
      Prepare p;
      p.generation = get_u64(payload.data() + 1);
      p.root_page = get_u64(payload.data() + 9);
      p.seq_upper_bound = get_u64(payload.data() + 17);
      const u32 n = get_u32(payload.data() + 25);
      if (payload.size() != 29 + static_cast<size_t>(n) * 16) {
        break;
      }
      for (u32 i = 0; i < n; ++i) {
        const u64 page = get_u64(payload.data() + 29 + i * 16);
        const i64 delta = static_cast<i64>(get_u64(payload.data() + 29 + i * 16 + 8));
        p.deltas.emplace_back(page, delta);
      }
      prepared[p.generation] = std::move(p);
    } else if (phase == kPhaseCommit && payload.size() == 9) {
      const u64 gen = get_u64(payload.data() + 1);
      auto it = prepared.find(gen);
      if (it != prepared.end() && gen > manifest->recovered_.generation) {
        for (const auto& [page, delta] : it->second.deltas) {
          counts[page] += delta;
        }
        manifest->recovered_.generation = gen;
        manifest->recovered_.root_page = it->second.root_page;
        manifest->recovered_.seq_upper_bound = it->second.seq_upper_bound;
      }
    } else {
      break;
    }
  }
  manifest->append_offset_ = offset;

  for (const auto& [page, count] : counts) {
    if (count != 0) {
      manifest->recovered_.refcounts[page] = count;
    }
  }
  return manifest;
}

Status Manifest::append_record(std::string_view payload)
{
  std::string rec;
  put_u32(rec, static_cast<u32>(payload.size()));
  put_u64(rec, fnv1a64(payload.data(), payload.size()));
  rec.append(payload);
  TDB_TRY(file_->pwrite(append_offset_, rec));
  TDB_TRY(file_->sync());
  append_offset_ += rec.size();
  if (stats_ != nullptr) {
    stats_->add_log_write(PoolKind::kManifest, rec.size());
  }
  return Status::OK();
}

Status Manifest::append_prepare(const Prepare& prepare)
{
  TDB_TRY(append_record(encode_prepare(prepare)));
  pending_prepares_[prepare.generation] = prepare;
  return Status::OK();
}

Status Manifest::append_commit(u64 generation)
{
  std::string payload;
  payload.push_back(static_cast<char>(kPhaseCommit));
  put_u64(payload, generation);
  TDB_TRY(append_record(payload));

  // Committed: fold the prepare into the tracked state (mirrors replay).
  auto it = pending_prepares_.find(generation);
  if (it != pending_prepares_.end()) {
    for (const auto& [page, delta] : it->second.deltas) {
      i64& count = recovered_.refcounts[page];
      count += delta;
      if (count == 0) {
        recovered_.refcounts.erase(page);
      }
    }
    recovered_.generation = generation;
    recovered_.root_page = it->second.root_page;
    recovered_.seq_upper_bound = it->second.seq_upper_bound;
    pending_prepares_.erase(it);
  }
  return Status::OK();
}

Status Manifest::compact(Env& env, const std::string& path)
{
  const std::string tmp = path + ".tmp";
  TDB_TRY(env.remove_file(tmp));
  TDB_TRY_ASSIGN(std::unique_ptr<File> file, env.open_file(tmp, /*create=*/true));

  std::string header;
  put_u64(header, kMagic);
  put_u32(header, kManifestVersion);
  put_u32(header, kHashAlgoFnv1a64);
  TDB_TRY(file->pwrite(0, header));

  Prepare base;
  base.generation = recovered_.generation;
  base.root_page = recovered_.root_page;
  base.seq_upper_bound = recovered_.seq_upper_bound;
  for (const auto& [page, count] : recovered_.refcounts) {
    base.deltas.emplace_back(page, count);
  }
  const std::string prepare_payload = encode_prepare(base);
  std::string commit_payload;
  commit_payload.push_back(static_cast<char>(kPhaseCommit));
  put_u64(commit_payload, base.generation);

  u64 offset = kHeaderBytes;
  for (const std::string& payload : {prepare_payload, commit_payload}) {
    std::string rec;
    put_u32(rec, static_cast<u32>(payload.size()));
    put_u64(rec, fnv1a64(payload.data(), payload.size()));
    rec.append(payload);
    TDB_TRY(file->pwrite(offset, rec));
    offset += rec.size();
  }
  TDB_TRY(file->sync());
  TDB_TRY(env.rename_file(tmp, path));

  TDB_TRY_ASSIGN(file_, env.open_file(path, /*create=*/false));
  append_offset_ = offset;
  return Status::OK();
}

}  // namespace turtledb
