#include "fixtures.hpp"

namespace pesem::testing {
namespace {

ImportSpec named(std::string dll, std::vector<std::string> names) {
  ImportSpec s{std::move(dll), {}};
  for (auto& n : names) s.functions.emplace_back(std::move(n));
  return s;
}

std::vector<std::uint8_t> text_section(std::size_t n, std::uint32_t seed) { return code_like_bytes(n, seed); }

Fixture minimal() {
  PeSpec s;
  s.sections.push_back({".text", text_section(0x200, 1), scn::kText, std::nullopt});
  std::vector<std::uint8_t> rsrc;
  append_utf16(rsrc, "MinimalApplication");
  s.sections.push_back({".rsrc", rsrc, scn::kRdata, std::nullopt});
  s.imports.push_back(named("KERNEL32.dll", {"CreateFileA", "WriteFile"}));
  return {"minimal.exe", s};
}

Fixture plain() {
  PeSpec s;
  s.subsystem = 3;
  s.sections.push_back({".text", text_section(0x1200, 2), scn::kText, std::nullopt});
  std::vector<std::uint8_t> rdata;
  append_string(rdata, "usage: plain [options] <file>");
  append_string(rdata, "Copyright (c) Example Tools");
  append_string(rdata, "settings.ini");
  s.sections.push_back({".rdata", rdata, scn::kRdata, std::nullopt});
  s.sections.push_back({".data", std::vector<std::uint8_t>(0x80, 0), scn::kRwData, 0x400u});
  std::vector<std::uint8_t> rsrc;
  append_utf16(rsrc, "Plain Utility");
  s.sections.push_back({".rsrc", rsrc, scn::kRdata, std::nullopt});
  s.import_section = ".rdata";
  s.imports.push_back(named("KERNEL32.dll", {"GetModuleHandleA", "GetCommandLineA", "GetStartupInfoA", "HeapAlloc",
                                              "HeapFree", "GetProcessHeap", "ExitProcess", "GetLastError", "ReadFile",
                                              "CloseHandle", "GetFileSize", "SetFilePointer"}));
  s.imports.push_back(named("USER32.dll", {"MessageBoxA", "LoadStringA", "GetDesktopWindow"}));
  s.imports.push_back(named("msvcrt.dll", {"printf", "malloc", "free", "strlen", "exit"}));
  return {"plain.exe", s};
}

Fixture library() {
  PeSpec s;
  s.pe32plus = true;
  s.dll = true;
  s.subsystem = 2;
  s.sections.push_back({".text", text_section(0x600, 3), scn::kText, std::nullopt});
  s.sections.push_back({".rdata", {}, scn::kRdata, std::nullopt});
  s.sections.push_back({".pdata", std::vector<std::uint8_t>(0x30, 1), scn::kRdata, std::nullopt});
  s.import_section = ".rdata";
  s.imports.push_back(named("KERNEL32.dll", {"DisableThreadLibraryCalls", "GetTickCount64", "InitializeCriticalSection",
                                              "EnterCriticalSection", "LeaveCriticalSection"}));
  return {"library.dll", s};
}

Fixture upx() {
  PeSpec s;
  s.sections.push_back({"UPX0", {}, scn::kCode | scn::kExec | scn::kRead | scn::kWrite, 0x8000u});
  s.sections.push_back({"UPX1", random_bytes(0x2000, 4), scn::kCode | scn::kExec | scn::kRead | scn::kWrite, std::nullopt});
  std::vector<std::uint8_t> rsrc;
  append_utf16(rsrc, "PackedTool");
  s.sections.push_back({".rsrc", rsrc, scn::kRwData, std::nullopt});
  s.import_section = ".rsrc";
  s.imports.push_back(named("KERNEL32.DLL", {"LoadLibraryA", "GetProcAddress", "VirtualProtect", "ExitProcess"}));
  s.entry_section = "UPX1";
  s.entry_offset = 0x1f00;
  return {"upx.exe", s};
}

Fixture rsrc_exec() {
  PeSpec s;
  s.sections.push_back({".text", text_section(0x400, 5), scn::kText, std::nullopt});
  s.sections.push_back({".rsrc", code_like_bytes(0x300, 6), scn::kCode | scn::kExec | scn::kRead, std::nullopt});
  s.imports.push_back(named("KERNEL32.dll", {"GetModuleHandleW", "FindResourceW", "LoadResource", "LockResource",
                                              "SizeofResource", "ExitProcess"}));
  return {"rsrc_exec.exe", s};
}

Fixture ordinal() {
  PeSpec s;
  s.sections.push_back({".text", text_section(0x400, 7), scn::kText, std::nullopt});
  ImportSpec ws{"WS2_32.dll", {}};
  ws.functions.emplace_back(std::uint16_t{115});
  ws.functions.emplace_back(std::uint16_t{23});
  ws.functions.emplace_back(std::uint16_t{4});
  s.imports.push_back(std::move(ws));
  ImportSpec foo{"foo.dll", {}};
  foo.functions.emplace_back(std::uint16_t{9});
  s.imports.push_back(std::move(foo));
  s.imports.push_back(named("KERNEL32.dll", {"Sleep", "ExitProcess", "GetTickCount"}));
  return {"ordinal.exe", s};
}

Fixture noimports() {
  PeSpec s;
  s.subsystem = 3;
  s.sections.push_back({".text", text_section(0x200, 8), scn::kText, std::nullopt});
  return {"noimports.exe", s};
}

Fixture inject() {
  PeSpec s;
  s.timestamp = 0;
  s.sections.push_back({".text", text_section(0x800, 9), scn::kText, std::nullopt});
  std::vector<std::uint8_t> data;
  append_string(data, "http://evil.example/payload.bin");
  append_string(data, "explorer.exe");
  s.sections.push_back({".data", data, scn::kRwData, std::nullopt});
  s.imports.push_back(named("KERNEL32.dll", {"OpenProcess", "VirtualAllocEx", "WriteProcessMemory", "CreateRemoteThread",
                                              "CloseHandle", "ExitProcess"}));
  return {"inject.exe", s};
}

Fixture weird_entry() {
  PeSpec s;
  s.sections.push_back({".text", text_section(0x400, 10), scn::kText, std::nullopt});
  s.sections.push_back({".weird", code_like_bytes(0x200, 11), scn::kText, std::nullopt});
  s.imports.push_back(named("KERNEL32.dll", {"GetModuleHandleA", "ExitProcess", "Sleep", "GetTickCount", "CloseHandle"}));
  s.entry_section = ".weird";
  s.entry_offset = 0x10;
  return {"weird_entry.exe", s};
}

}  // namespace

std::vector<Fixture> fixture_corpus() {
  return {minimal(), plain(), library(), upx(), rsrc_exec(), ordinal(), noimports(), inject(), weird_entry()};
}

}  // namespace pesem::testing
