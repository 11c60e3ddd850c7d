# presets package
