"""Writes the scenario JSON files under src/autotamp/scenarios/data.

Maps are redrawn to round coordinates; rerun after editing geometry here.
The HouseWorld2 time limit is filled in by ``autotamp.scenarios.refresh_houseworld2``.
"""
import json
import pathlib

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "autotamp" / "scenarios" / "data"


def region(name, x0, x1, y0, y1, **attrs):
    return {"name": name, "rect": [x0, x1, y0, y1], "attributes": attrs}


def wall(name, x0, x1, y0, y1):
    return region(name, x0, x1, y0, y1, group="walls", color="black")


HOUSE_ROOMS = [
    # top row
    region("room_green", 0.5, 3.5, 7.5, 10.5, kind="bedroom", color="green"),
    region("room_yellow", 4.0, 6.0, 7.5, 10.5, kind="restroom", color="yellow"),
    region("room_purple", 6.5, 10.5, 7.5, 10.5, kind="master bedroom", color="purple"),
    region("room_lightpink", 11.0, 13.5, 7.5, 10.5, kind="guest room", color="lightpink"),
    # middle row
    region("room_orange", 0.5, 3.5, 4.0, 7.0, kind="kitchen", color="orange"),
    region("room_gray", 4.0, 8.5, 4.0, 7.0, kind="living room", color="gray"),
    region("room_brown", 9.0, 10.5, 4.0, 7.0, kind="dining room", color="saddlebrown"),
    region("room_red", 11.0, 13.5, 4.0, 7.0, kind="bathroom", color="red"),
    # bottom row
    region("room_cyan", 0.5, 3.5, 0.5, 3.5, kind="study", color="cyan"),
    region("room_blue", 4.0, 8.5, 0.5, 3.5, kind="hall", color="blue"),
    region("room_darkblue", 9.0, 10.5, 0.5, 3.5, kind="storage", color="darkblue"),
    region("room_pink", 11.0, 13.5, 0.5, 3.5, kind="bedroom", color="pink"),
]

HOUSE = {
    "name": "houseworld",
    "workspace": [0, 14, 0, 11],
    "time_limit": "inf",
    "regions": HOUSE_ROOMS,
    "agents": [{"name": "robot", "start": [3.75, 3.75], "half_width": 0.1, "v_max": 1.0}],
    "start_zone": [0, 14, 0, 11],
}

HOUSE_INSTRUCTIONS = [
    ("Navigate into the green bedroom and then go to the yellow restroom.",
     "finally and enter(room_green) finally enter(room_yellow)"),
    ("Travel to the yellow restroom, and then go to the pink bedroom. Visit both the kitchen and the dining "
     "room. Finally end in the red bathroom.",
     "and and and finally and enter(room_yellow) finally enter(room_pink) finally enter(room_orange) "
     "finally enter(room_brown) finally globally enter(room_red)"),
    ("Navigate into the green bedroom and then go to the yellow restroom, but remember do not touch the "
     "livingroom at anytime.",
     "and finally and enter(room_green) finally enter(room_yellow) globally not_enter(room_gray)"),
    ("Go to one room with cyan color, then enter the bedroom and stay there for 5 seconds, finally reach the "
     "restroom. remember always do not touch the two true blue areas.",
     "and and finally and enter(room_cyan) finally and globally [0, 5] enter(room_green) "
     "finally enter(room_yellow) globally not_enter(room_blue) globally not_enter(room_darkblue)"),
    ("Visit two rooms with color closest to red, but not the pure red color.",
     "and finally enter(room_purple) finally enter(room_pink)"),
    ("Visit every room that is not light pink or cyan.",
     "and and and and and and and and and finally enter(room_green) finally enter(room_yellow) "
     "finally enter(room_purple) finally enter(room_orange) finally enter(room_gray) finally enter(room_brown) "
     "finally enter(room_red) finally enter(room_blue) finally enter(room_darkblue) finally enter(room_pink)"),
    ("Always go to the kitchen immediately before entering either bathroom. Go to the yellow room and the red "
     "room, but do not enter any blue rooms.",
     "and and and and and finally enter(room_yellow) finally enter(room_red) "
     "until not_enter(room_yellow) enter(room_orange) until not_enter(room_red) enter(room_orange) "
     "globally not_enter(room_blue) globally not_enter(room_darkblue)"),
    ("Move to the kitchen, then move to the bedroom without entering any blue rooms. Stay there for at least "
     "10 seconds, then return to the kitchen via the living room.",
     "and and finally and enter(room_orange) finally and globally [0, 10] enter(room_green) "
     "finally and enter(room_gray) finally enter(room_orange) globally not_enter(room_blue) "
     "globally not_enter(room_darkblue)"),
    ("Eventually end up in the master bedroom, but first go to both restrooms. After you have gone to each "
     "restroom, do not pass through any other rooms.",
     "and and finally globally enter(room_purple) until not_enter(room_purple) enter(room_yellow) "
     "until not_enter(room_purple) enter(room_red)"),
    ("Visit every room at least once, but not go to the pink room until you are in a larger blue room.",
     "and and and and and and and and and and and and finally enter(room_green) finally enter(room_yellow) "
     "finally enter(room_purple) finally enter(room_lightpink) finally enter(room_orange) "
     "finally enter(room_gray) finally enter(room_brown) finally enter(room_red) finally enter(room_cyan) "
     "finally enter(room_blue) finally enter(room_darkblue) finally enter(room_pink) "
     "until not_enter(room_pink) enter(room_blue)"),
]

HW1_CASES = [{
    "id": "houseworld1-example",
    "instruction": "Visit two rooms with color closest to red, but not the pure red color.",
    "stl": "and finally enter(room_purple) finally enter(room_pink)",
    "steps": 20, "horizon": 40.0, "time_limit": "inf",
}] + [{
    "id": f"houseworld1-task-{i + 1:02d}",
    "instruction": text,
    "stl": stl,
    "steps": 24, "horizon": 72.0, "time_limit": "inf",
} for i, (text, stl) in enumerate(HOUSE_INSTRUCTIONS)]

CHIPS = {
    "name": "chips",
    "workspace": [0, 14, 0, 10],
    "time_limit": "inf",
    "regions": [
        wall("wall1_low", 5.0, 5.6, 0.0, 4.0),
        wall("wall1_high", 5.0, 5.6, 6.0, 10.0),
        wall("wall2_low", 9.6, 10.2, 0.0, 4.0),
        wall("wall2_high", 9.6, 10.2, 6.0, 10.0),
        region("door1", 5.0, 5.6, 3.4, 6.6, color="tan"),
        region("door2", 9.6, 10.2, 3.4, 6.6, color="tan"),
        region("key1", 1.0, 2.0, 8.0, 9.0, color="gold", opens="door1"),
        region("key2", 7.0, 8.5, 0.5, 2.0, color="gold", opens="door2"),
        region("goal_1", 7.0, 8.5, 8.0, 9.5, color="royalblue"),
        region("goal_2", 12.0, 13.5, 8.0, 9.5, color="royalblue"),
        region("goal_3", 12.0, 13.5, 0.5, 2.0, color="royalblue"),
    ],
    "agents": [{"name": "robot", "start": [1.0, 5.0], "half_width": 0.2, "v_max": 1.0}],
    "start_zone": [0, 4.6, 0, 10],
}
CHIPS_CASES = [{
    "id": "chips-example",
    "instruction": "Try to reach all the goals but you have to reach the corresponding key first to open the "
                   "specific door. For example, you have to reach key1 ahead to open door1. Also remember "
                   "always do not touch the walls.",
    "stl": "and and and and and finally enter(goal_1) finally enter(goal_2) finally enter(goal_3) "
           "until not_enter(door1) enter(key1) until not_enter(door2) enter(key2) globally not_enter(walls)",
    "steps": 24, "horizon": 60.0, "time_limit": "inf",
}]

OVERCOOKED = {
    "name": "overcooked",
    "workspace": [0, 9, 0, 9],
    "time_limit": 20.0,
    "regions": [
        wall("counter", 2.5, 6.5, 2.5, 6.5),
        region("ingredient_1", 0.0, 1.5, 7.5, 9.0, color="skyblue"),
        region("ingredient_2", 7.5, 9.0, 7.5, 9.0, color="skyblue"),
        region("ingredient_3", 7.5, 9.0, 0.0, 1.5, color="skyblue"),
        region("cookingroom", 0.0, 1.5, 0.0, 1.5, color="orange"),
    ],
    "agents": [
        {"name": "chef_1", "start": [1.0, 3.5], "half_width": 0.3, "v_max": 1.0},
        {"name": "chef_2", "start": [3.5, 1.0], "half_width": 0.3, "v_max": 1.0},
    ],
    "start_zone": [0, 4.5, 0, 4.5],
}
OVERCOOKED_CASES = [{
    "id": "overcooked-example",
    "instruction": "Enter all the ingredient rooms to gather ingredients; whenever a chef is in an "
                   "ingredient room it must reach the CookingRoom within 3 seconds. Never touch the counter "
                   "in the middle.",
    "stl": "and and and and and and finally enter(ingredient_1) finally enter(ingredient_2) "
           "finally enter(ingredient_3) imply enter(ingredient_1) finally [0, 3] enter(cookingroom) "
           "imply enter(ingredient_2) finally [0, 3] enter(cookingroom) "
           "imply enter(ingredient_3) finally [0, 3] enter(cookingroom) globally not_enter(walls)",
    "steps": 20, "horizon": 20.0, "time_limit": 20.0,
}]

ROVER = {
    "name": "rover",
    "workspace": [0, 12, 0, 12],
    "time_limit": 30.0,
    "regions": [
        wall("wall_a", 4.0, 4.5, 0.0, 4.0),
        wall("wall_b", 7.5, 8.0, 8.0, 12.0),
        wall("wall_c", 0.0, 3.0, 8.0, 8.5),
        region("goal_1", 1.0, 2.5, 10.0, 11.5, color="royalblue"),
        region("goal_2", 9.0, 10.5, 9.5, 11.0, color="royalblue"),
        region("goal_3", 9.5, 11.0, 1.0, 2.5, color="royalblue"),
        region("transmitter_1", 0.0, 1.5, 5.0, 6.5, color="red"),
        region("transmitter_2", 10.5, 12.0, 5.5, 7.0, color="red"),
        region("charging", 5.0, 7.0, 5.0, 7.0, color="lightskyblue"),
    ],
    "agents": [
        {"name": "rover_1", "start": [5.0, 3.5], "half_width": 0.2, "v_max": 1.0},
        {"name": "rover_2", "start": [6.0, 3.5], "half_width": 0.2, "v_max": 1.0},
        {"name": "rover_3", "start": [7.0, 3.5], "half_width": 0.2, "v_max": 1.0},
    ],
    "start_zone": [4.7, 7.5, 2.5, 4.7],
}
ROVER_CASES = [{
    "id": "rover-example",
    "instruction": "All rovers must reach the blue charging station within 5 units of time each time they exit "
                   "it. Once they reach their destination, they need to get to a yellow transmitter within 2 "
                   "time units to send the collected information to the remote control. Rovers must keep "
                   "clear of black walls and other rovers. All target areas need to be visited.",
    "stl": "and and and and and and and finally enter(goal_1) finally enter(goal_2) finally enter(goal_3) "
           "imply enter(goal_1) finally [0, 2] or enter(transmitter_1) enter(transmitter_2) "
           "imply enter(goal_2) finally [0, 2] or enter(transmitter_1) enter(transmitter_2) "
           "imply enter(goal_3) finally [0, 2] or enter(transmitter_1) enter(transmitter_2) "
           "imply not_enter(charging) finally [0, 5] enter(charging) globally not_enter(walls)",
    "steps": 20, "horizon": 30.0, "time_limit": 30.0,
}]

WALL = {
    "name": "wall",
    "workspace": [0, 12, 0, 8],
    "time_limit": 24.0,
    "regions": [
        wall("wall_low", 5.5, 6.5, 0.0, 3.5),
        wall("wall_high", 5.5, 6.5, 4.5, 8.0),
        region("goal_1", 9.0, 10.5, 6.0, 7.5, color="royalblue"),
        region("goal_2", 10.0, 11.5, 3.25, 4.75, color="royalblue"),
        region("goal_3", 9.0, 10.5, 0.5, 2.0, color="royalblue"),
    ],
    "agents": [
        {"name": "agent_1", "start": [2.0, 6.0], "half_width": 0.25, "v_max": 1.0},
        {"name": "agent_2", "start": [2.0, 4.0], "half_width": 0.25, "v_max": 1.0},
        {"name": "agent_3", "start": [2.0, 2.0], "half_width": 0.25, "v_max": 1.0},
    ],
    "start_zone": [0.5, 4.5, 0.5, 7.5],
}
WALL_CASES = [{
    "id": "wall-example",
    "instruction": "Reach all the goals and stay there. Take care of the collision among each agent and to the "
                   "walls.",
    "stl": "and and and finally globally enter(goal_1) finally globally enter(goal_2) "
           "finally globally enter(goal_3) globally not_enter(walls)",
    "steps": 16, "horizon": 24.0, "time_limit": 24.0,
}]


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    files = {
        "houseworld": (HOUSE, {"houseworld1": HW1_CASES}),
        "chips": (CHIPS, {"chips": CHIPS_CASES}),
        "overcooked": (OVERCOOKED, {"overcooked": OVERCOOKED_CASES}),
        "rover": (ROVER, {"rover": ROVER_CASES}),
        "wall": (WALL, {"wall": WALL_CASES}),
    }
    for name, (env, cases) in files.items():
        (DATA / f"{name}.env.json").write_text(json.dumps(env, indent=1) + "\n")
        for scenario, items in cases.items():
            (DATA / f"{scenario}.cases.json").write_text(json.dumps(items, indent=1) + "\n")


if __name__ == "__main__":
    main()
