#!/usr/bin/env python3
"""Write the checked-in benchmark scaffolds, their golden compile outputs and the synthetic_hud set.

Layouts below are authored by hand as nested tuples
``(id, label, [x0, y0, x1, y1], seg_prompt, children)``. Re-run after any
intended change to the emitter and review the golden diff:

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from uirecon.calibration import calibrate
from uirecon.evaluation import scaffold_to_design_json
from uirecon.fsutil import atomic_write
from uirecon.schema import STRICT, BBox, Label, Scaffold, UIElement, serialize_scaffold, validate
from uirecon.synthesis import compile as compile_ui
from uirecon.synthetic import write_fixture

ROOT = Path(__file__).resolve().parent.parent / "fixtures"


def n(el_id, label, box, prompt, *children):
    return (el_id, label, box, prompt, children)


LAYOUTS = {
    "main_menu": ((1280, 720), [
        n("menu_root", "panel", [0, 0, 1280, 720], "full screen main menu backdrop",
          n("game_title", "text", [340, 60, 940, 160], "large game title lettering"),
          n("menu_column", "panel", [480, 220, 800, 620], "vertical menu button column",
            n("btn_new_game", "button", [500, 240, 780, 300], "new game button"),
            n("btn_continue", "button", [500, 320, 780, 380], "continue button"),
            n("btn_options", "button", [500, 400, 780, 460], "options button"),
            n("btn_credits", "button", [500, 480, 780, 540], "credits button"),
            n("btn_exit", "button", [500, 560, 780, 610], "exit button")),
          n("settings_icon", "icon", [1200, 20, 1260, 80], "gear settings icon"),
          n("version_text", "text", [20, 680, 200, 710], "small version number text"),
          n("hero_art", "image", [860, 200, 1260, 660], "hero character illustration")),
    ]),
    "combat_hud": ((1920, 1080), [
        n("Main HUD", "panel", [0, 0, 1920, 1080], "in game heads up display overlay",
          n("player_frame", "panel", [20, 20, 520, 180], "player portrait and status frame",
            n("portrait", "image", [30, 30, 170, 170], "player character portrait"),
            n("health_bar", "progress_bar", [190, 40, 500, 80], "red health bar"),
            n("mana_bar", "progress_bar", [190, 100, 500, 140], "blue mana bar")),
          n("orb", "healthglobe", [40, 860, 240, 1060], "glowing red health globe"),
          n("minimap", "image", [1660, 20, 1900, 260], "circular minimap"),
          n("skill_bar", "panel", [660, 960, 1260, 1060], "skill hotbar",
            n("skill_1", "icon", [670, 970, 750, 1050], "skill slot one icon"),
            n("skill_2", "icon", [770, 970, 850, 1050], "skill slot two icon"),
            n("skill_3", "icon", [870, 970, 950, 1050], "skill slot three icon"),
            n("skill_4", "icon", [970, 970, 1050, 1050], "skill slot four icon"),
            n("skill_5", "icon", [1070, 970, 1150, 1050], "skill slot five icon"),
            n("skill_6", "icon", [1170, 970, 1250, 1050], "skill slot six icon")),
          n("quest_tracker", "text", [1600, 300, 1900, 500], "quest objective tracker text")),
    ]),
    "inventory": ((1280, 720), [
        n("inventory_window", "panel", [140, 60, 1140, 660], "inventory window frame",
          n("inventory_title", "text", [160, 70, 500, 110], "inventory heading text"),
          n("close_button", "button", [1080, 70, 1130, 120], "close window x button"),
          n("slot_grid", "grid", [160, 130, 760, 630], "grid of item slots"),
          n("item_strip", "panel", [780, 130, 1120, 630], "equipped item column",
            n("item_helmet", "icon", [800, 150, 900, 250], "helmet item icon"),
            n("item_armor", "icon", [800, 270, 900, 370], "armor item icon"),
            n("item_boots", "icon", [800, 390, 900, 490], "boots item icon"),
            n("item_sword", "icon", [1000, 150, 1100, 250], "sword item icon"),
            n("item_shield", "icon", [1000, 270, 1100, 370], "shield item icon"),
            n("gold_text", "text", [800, 560, 1100, 610], "gold amount text")),
          n("sort_toggle", "toggle", [160, 640, 260, 655], "sort items toggle")),
    ]),
    "settings": ((1280, 720), [
        n("settings_root", "panel", [200, 80, 1080, 640], "settings dialog",
          n("settings_header", "text", [220, 90, 600, 140], "settings title text"),
          n("audio_group", "panel", [220, 160, 640, 500], "audio settings group",
            n("music_label", "text", [240, 180, 400, 220], "music volume label"),
            n("music_slider", "slider", [410, 185, 620, 215], "music volume slider"),
            n("sfx_label", "text", [240, 240, 400, 280], "effects volume label"),
            n("sfx_slider", "slider", [410, 245, 620, 275], "effects volume slider"),
            n("mute_toggle", "toggle", [240, 300, 400, 340], "mute all toggle")),
          n("video_group", "panel", [660, 160, 1060, 500], "video settings group",
            n("vsync_toggle", "toggle", [680, 180, 900, 220], "vsync toggle"),
            n("fullscreen_toggle", "toggle", [680, 240, 900, 280], "fullscreen toggle"),
            n("gamma_slider", "slider", [680, 300, 1040, 330], "gamma slider")),
          n("apply_button", "button", [860, 560, 1060, 620], "apply settings button")),
    ]),
    "dialogue_box": ((1280, 720), [
        n("dialogue_panel", "panel", [100, 480, 1180, 700], "dialogue box at bottom",
          n("speaker_portrait", "image", [120, 500, 300, 680], "speaker portrait"),
          n("dialogue_text", "text", [320, 500, 1160, 620], "dialogue line text"),
          n("choice_a", "button", [320, 630, 720, 690], "first reply choice button"),
          n("choice_b", "button", [740, 630, 1160, 690], "second reply choice button")),
    ]),
    "shop_screen": ((1600, 900), [
        n("shop_root", "panel", [0, 0, 1600, 900], "shop screen background",
          n("shop_banner", "image", [0, 0, 1600, 120], "shop banner artwork"),
          n("catalog", "panel", [40, 140, 1060, 860], "item catalog panel",
            n("offer_row_1", "panel", [60, 160, 1040, 380], "first offer row",
              n("offer_1_icon", "icon", [80, 180, 260, 360], "potion offer icon"),
              n("offer_1_price", "text", [280, 180, 600, 240], "potion price text"),
              n("offer_1_buy", "button", [820, 300, 1020, 360], "buy potion button")),
            n("offer_row_2", "panel", [60, 400, 1040, 620], "second offer row",
              n("offer_2_icon", "icon", [80, 420, 260, 600], "scroll offer icon"),
              n("offer_2_price", "text", [280, 420, 600, 480], "scroll price text"),
              n("offer_2_buy", "button", [820, 540, 1020, 600], "buy scroll button"))),
          n("wallet", "panel", [1100, 140, 1560, 300], "wallet panel",
            n("coin_icon", "icon", [1120, 160, 1240, 280], "gold coin icon"),
            n("coin_count", "text", [1260, 190, 1540, 250], "coin count text")),
          n("leave_button", "button", [1340, 800, 1560, 860], "leave shop button")),
    ]),
    "pause_menu": ((1280, 720), [
        n("Pause Overlay", "panel", [0, 0, 1280, 720], "dim pause overlay",
          n("pause_card", "panel", [440, 160, 840, 560], "pause menu card",
            n("Resume", "button", [460, 180, 820, 240], "resume button"),
            n("resume", "button", [460, 260, 820, 320], "second resume button"),
            n("btn.save", "button", [460, 340, 820, 400], "save game button"),
            n("btn save", "button", [460, 420, 820, 480], "save and quit button"),
            n("pause_hint", "text", [460, 500, 820, 540], "controller hint text"))),
    ]),
    "loading_screen": ((1920, 1080), [
        n("loading_root", "panel", [0, 0, 1920, 1080], "loading screen",
          n("splash_art", "image", [0, 0, 1920, 900], "splash artwork"),
          n("load_progress", "progress_bar", [360, 960, 1560, 1000], "loading progress bar"),
          n("tip_text", "text", [360, 1010, 1560, 1060], "gameplay tip text")),
    ]),
    "quest_log": ((1280, 720), [
        n("quest_window", "panel", [80, 40, 1200, 680], "quest log window",
          n("quest_tabs", "panel", [100, 60, 1180, 120], "quest category tabs",
            n("tab_main", "toggle", [110, 70, 360, 110], "main quests tab"),
            n("tab_side", "toggle", [380, 70, 630, 110], "side quests tab"),
            n("tab_done", "toggle", [650, 70, 900, 110], "completed quests tab")),
          n("quest_list", "panel", [100, 140, 500, 660], "quest list column",
            n("quest_1", "text", [120, 160, 480, 200], "first quest title"),
            n("quest_2", "text", [120, 220, 480, 260], "second quest title"),
            n("quest_3", "text", [120, 280, 480, 320], "third quest title")),
          n("quest_detail", "panel", [520, 140, 1180, 660], "quest detail pane",
            n("quest_desc", "text", [540, 160, 1160, 500], "quest description text"),
            n("reward_icon", "icon", [540, 520, 640, 620], "quest reward icon"),
            n("track_button", "button", [960, 580, 1160, 640], "track quest button"))),
    ]),
    "panel_button": ((800, 600), [
        n("panel", "panel", [100, 100, 500, 400], "plain panel",
          n("ok_button", "button", [150, 300, 350, 360], "ok button")),
    ]),
    "empty_canvas": ((640, 360), []),
    # siblings listed out of z-order, two equal-area icons, and two toplevel panels
    "overlays": ((1024, 768), [
        n("toast", "panel", [700, 600, 1000, 740], "toast notification",
          n("toast_text", "text", [720, 620, 980, 720], "toast message text")),
        n("board", "panel", [0, 0, 1024, 768], "board background",
          n("badge_b", "icon", [300, 100, 350, 150], "second badge icon"),
          n("badge_a", "icon", [100, 100, 150, 150], "first badge icon"),
          n("score_panel", "panel", [600, 20, 1000, 220], "score panel",
            n("score_text", "text", [620, 40, 980, 120], "score value text"),
            n("combo_bar", "progress_bar", [620, 140, 980, 180], "combo meter")),
          n("timer", "healthglobe", [20, 20, 80, 80], "round timer dial"),
          n("volume", "slider", [20, 700, 300, 740], "volume slider")),
    ]),
}


def flatten(nodes, parent=None):
    for el_id, label, box, prompt, children in nodes:
        yield UIElement(el_id, Label(label), BBox(*box), parent, prompt)
        yield from flatten(children, el_id)


def build(name: str) -> Scaffold:
    (w, h), nodes = LAYOUTS[name]
    s = Scaffold(w, h, tuple(flatten(nodes)), source_image=f"{name}.png")
    # calibration of an already-consistent layout only assigns collision-free asset paths
    out = calibrate(s)
    assert [e.bbox for e in out.elements] == [e.bbox for e in s.elements], name
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--root", type=Path, default=ROOT)
    args = parser.parse_args(argv)

    bench, golden = args.root / "benchmark", args.root / "golden"
    for name in LAYOUTS:
        s = build(name)
        problems = validate(s, STRICT)
        if problems:
            for d in problems:
                print(f"{name}: {d.format_line()}", file=sys.stderr)
            return 1
        atomic_write(bench / f"{name}.yaml", serialize_scaffold(s, "yaml"))
        ui = compile_ui(s, name)
        atomic_write(golden / name / f"{name}.uxml", ui.uxml_text)
        atomic_write(golden / name / f"{name}.uss", ui.uss_text)
        atomic_write(golden / name / "manifest.json", ui.manifest_json() + "\n")
        print(f"{name:<16} {len(s.elements):>3} elements")

    # design-tool style ground truth for the evaluation examples
    for name in ("combat_hud", "settings"):
        atomic_write(args.root / "truth" / f"{name}.json",
                     json.dumps(scaffold_to_design_json(build(name), name), indent=2) + "\n")
    write_fixture(args.root / "synthetic_hud")
    return 0


if __name__ == "__main__":
    sys.exit(main())
